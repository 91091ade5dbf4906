#pragma once

#include "polykin/characteristics.hpp"
#include "polykin/diagnostics.hpp"
#include "polykin/error.hpp"
#include "polykin/fragmentation.hpp"
#include "polykin/io.hpp"
#include "polykin/kinetics.hpp"
#include "polykin/rates.hpp"
#include "polykin/scenario.hpp"
#include "polykin/series.hpp"
#include "polykin/state.hpp"
#include "polykin/steady.hpp"
#include "polykin/verify.hpp"
