/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

// Solver headers only; app.hpp, service.hpp and http_routes.hpp pull in the
// vendored JSON and HTTP headers and are included separately.

#include "fairtopk/control.hpp"
#include "fairtopk/errors.hpp"
#include "fairtopk/exact.hpp"
#include "fairtopk/geometry.hpp"
#include "fairtopk/ingest.hpp"
#include "fairtopk/kinetic_tournament.hpp"
#include "fairtopk/klevel_hd.hpp"
#include "fairtopk/milp.hpp"
#include "fairtopk/model.hpp"
#include "fairtopk/oracle.hpp"
#include "fairtopk/seidel_lp.hpp"
#include "fairtopk/sweep2d.hpp"
