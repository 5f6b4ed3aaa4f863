// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dtameta {

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset-level problems (CSV schema, invalid counts, unknown builtins).
class data_error : public error {
 public:
  using error::error;
};

/// A required column or field is missing from the input.
class schema_error : public data_error {
 public:
  using data_error::data_error;
};

/// A record violates a domain invariant (e.g. tp > n_diseased).
class validation_error : public data_error {
 public:
  using data_error::data_error;
};

/// Malformed cell content (non-integer counts, broken quoting).
class parse_error : public data_error {
 public:
  using data_error::data_error;
};

/// Unknown name lookups (builtin datasets, covariates, columns).
class lookup_error : public data_error {
 public:
  using data_error::data_error;
};

/// Association parameter (or other argument) outside its family domain.
class domain_error : public error {
 public:
  using error::error;
};

/// Operation not supported for the requested family.
class capability_error : public error {
 public:
  using error::error;
};

/// Sampler could not run (initialization failure, invalid chain config).
class sampling_error : public error {
 public:
  using error::error;
};

/// Draw matrix does not match the model layout it is summarized against.
class layout_error : public error {
 public:
  using error::error;
};

/// Fits over different datasets cannot be compared.
class comparability_error : public error {
 public:
  using error::error;
};

/// Bad command-line invocation.
class usage_error : public error {
 public:
  using error::error;
};

/// Filesystem / bundle problems.
class io_error : public error {
 public:
  using error::error;
};

}  // namespace dtameta
