#pragma once

#include "skeldiff/analysis.hpp"
#include "skeldiff/features.hpp"
#include "skeldiff/ingest.hpp"
#include "skeldiff/metrics.hpp"
#include "skeldiff/stats_report.hpp"
#include "skeldiff/synth.hpp"
#include "skeldiff/text.hpp"
#include "skeldiff/types.hpp"
