#pragma once

#include "weakdiss/errors.hpp"
#include "weakdiss/operators.hpp"
#include "weakdiss/lindblad.hpp"
#include "weakdiss/weak_value.hpp"
#include "weakdiss/meter.hpp"
#include "weakdiss/scenarios.hpp"
