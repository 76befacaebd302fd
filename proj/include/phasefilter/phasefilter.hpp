#pragma once

#include "phasefilter/errors.hpp"
#include "phasefilter/linalg.hpp"
#include "phasefilter/rng.hpp"
#include "phasefilter/oracle.hpp"
#include "phasefilter/hermitian.hpp"
#include "phasefilter/randomness.hpp"
#include "phasefilter/discrepancy.hpp"
#include "phasefilter/filter.hpp"
#include "phasefilter/sampler.hpp"
#include "phasefilter/diagonalizer.hpp"
#include "phasefilter/matrix_io.hpp"
#include "phasefilter/experiments.hpp"
