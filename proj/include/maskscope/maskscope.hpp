#pragma once

#include "maskscope/aggregate.hpp"
#include "maskscope/bitmap_io.hpp"
#include "maskscope/civil_date.hpp"
#include "maskscope/config.hpp"
#include "maskscope/distributions.hpp"
#include "maskscope/error.hpp"
#include "maskscope/geometry.hpp"
#include "maskscope/mask_fit.hpp"
#include "maskscope/policy.hpp"
#include "maskscope/records.hpp"
#include "maskscope/rng.hpp"
#include "maskscope/roi.hpp"
#include "maskscope/series.hpp"
#include "maskscope/stats.hpp"
#include "maskscope/synth.hpp"
