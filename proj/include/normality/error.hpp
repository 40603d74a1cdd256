#pragma once

#include <stdexcept>
#include <string>

namespace normality {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed structure: unknown world, axiom violation, bad evidence.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Invalid probability or density model (prior mass, zero-mass evidence, t = 0).
class ModelError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public ModelError {
 public:
  using ModelError::ModelError;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The learned proposition is false at the actual state.
class FalseDiscovery : public Error {
 public:
  using Error::Error;
};

/// The updated evidence is not a possible body of evidence.
class InexpressibleEvidence : public Error {
 public:
  using Error::Error;
};

/// Truncation too shallow to certify a threshold crossing.
class UndecidedAtDepth : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace normality
