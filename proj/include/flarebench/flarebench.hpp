#pragma once

#include "core_types.hpp"
#include "commands.hpp"
#include "cv_harness.hpp"
#include "experiments.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "normalize.hpp"
#include "sampling.hpp"
#include "svm.hpp"
#include "synthgen.hpp"
#include "trial.hpp"
