#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "gwit/blas_env.hpp"

int main(int argc, char** argv) {
  gwit::init_blas_env();
  return doctest::Context(argc, argv).run();
}
