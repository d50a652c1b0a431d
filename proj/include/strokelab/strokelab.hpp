#pragma once

// Umbrella header for the full pipeline.

#include "strokelab/cohort.hpp"
#include "strokelab/error.hpp"
#include "strokelab/extractor.hpp"
#include "strokelab/features.hpp"
#include "strokelab/ink_io.hpp"
#include "strokelab/jsonl.hpp"
#include "strokelab/kinematics.hpp"
#include "strokelab/labeling.hpp"
#include "strokelab/learner.hpp"
#include "strokelab/lognormal.hpp"
#include "strokelab/manifest.hpp"
#include "strokelab/parallel.hpp"
#include "strokelab/pipeline.hpp"
#include "strokelab/report_io.hpp"
#include "strokelab/rng.hpp"
#include "strokelab/stats.hpp"
#include "strokelab/svg_plot.hpp"
#include "strokelab/types.hpp"
#include "strokelab/version.hpp"
#include "strokelab/xml.hpp"
