#pragma once

#include <stdexcept>
#include <string>

namespace tuq {

// Malformed or inconsistent on-disk data (mesh/image headers, manifests, configs).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Nonlinear or linear solver breakdown; message carries step index and residual.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Interpolation request outside the mesh.
class OutOfDomainError : public std::runtime_error {
public:
    explicit OutOfDomainError(const std::string& what) : std::runtime_error(what) {}
};

// Element-level assembly failure (degenerate cell, non-finite coefficient).
class AssemblyError : public std::runtime_error {
public:
    explicit AssemblyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tuq
