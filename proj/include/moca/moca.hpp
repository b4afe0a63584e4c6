#pragma once

#include "moca/errors.hpp"
#include "moca/tensor.hpp"
#include "moca/random.hpp"
#include "moca/schedule.hpp"
#include "moca/lts_io.hpp"
#include "moca/scheduler.hpp"
#include "moca/mask.hpp"
#include "moca/tracking.hpp"
#include "moca/blending.hpp"
#include "moca/metrics.hpp"
#include "moca/synth.hpp"
#include "moca/config.hpp"
#include "moca/pipeline.hpp"
#include "moca/report.hpp"
