/**
 * @file pybind.cpp
 * @brief Python bindings for the core operations (minimal stub for now).
 */

#include <pybind11/pybind11.h>

namespace py = pybind11;

PYBIND11_MODULE(specsurg, m) {
  m.doc() = "Half-line matrix Schrödinger scattering and bound-state surgery";
  m.def("version", [] { return "0.1.0"; });
}
