#pragma once

#include "beltgap/bandgap.hpp"
#include "beltgap/dispersion.hpp"
#include "beltgap/errors.hpp"
#include "beltgap/model.hpp"
#include "beltgap/modes.hpp"
#include "beltgap/output.hpp"
#include "beltgap/parallel.hpp"
#include "beltgap/timedomain.hpp"
