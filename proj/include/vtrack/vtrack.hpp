#pragma once

#include "vtrack/assignment.hpp"
#include "vtrack/config.hpp"
#include "vtrack/core.hpp"
#include "vtrack/error.hpp"
#include "vtrack/ingest.hpp"
#include "vtrack/kalman.hpp"
#include "vtrack/metrics.hpp"
#include "vtrack/pipeline.hpp"
#include "vtrack/random.hpp"
#include "vtrack/scenario.hpp"
#include "vtrack/spline.hpp"
#include "vtrack/text.hpp"
#include "vtrack/tracker.hpp"
