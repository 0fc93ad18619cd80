#pragma once

// Everything in one include.
#include "errors.hpp"
#include "parallel.hpp"
#include "field.hpp"
#include "fft.hpp"
#include "expression.hpp"
#include "symbol.hpp"
#include "spectral_ops.hpp"
#include "mollifier.hpp"
#include "time_series.hpp"
#include "sfld.hpp"
#include "state.hpp"
#include "state_io.hpp"
#include "microlocal.hpp"
#include "flow.hpp"
#include "phase.hpp"
#include "regularization.hpp"
#include "energy.hpp"
#include "step.hpp"
#include "schedule.hpp"
#include "driver.hpp"
#include "glue.hpp"
#include "diagnostics.hpp"
#include "smooth_solver.hpp"
#include "config.hpp"
