#pragma once

#include "velan/bench.hpp"
#include "velan/cmp_pipeline.hpp"
#include "velan/crs_pipeline.hpp"
#include "velan/error.hpp"
#include "velan/io.hpp"
#include "velan/kernel.hpp"
#include "velan/oracle.hpp"
#include "velan/scan.hpp"
#include "velan/synthetic.hpp"
#include "velan/trace_cache.hpp"
#include "velan/traveltime.hpp"
#include "velan/types.hpp"
