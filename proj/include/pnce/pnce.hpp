#pragma once

#include "pnce/binary16.hpp"
#include "pnce/channel_sim.hpp"
#include "pnce/error.hpp"
#include "pnce/estimator.hpp"
#include "pnce/experiments.hpp"
#include "pnce/io.hpp"
#include "pnce/metrics.hpp"
#include "pnce/oracle.hpp"
#include "pnce/pilot_design.hpp"
#include "pnce/pn_core.hpp"
#include "pnce/random.hpp"
