/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace fairtopk {

// Bad argument to an operation (out-of-range k, negative eps, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input data violating a model invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operation called in a state that does not permit it.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class UnsupportedDimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by test-data generators when a padding construction has no room.
class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fairtopk
