#pragma once

// Umbrella header: the whole race-prediction toolkit.
//
//   trace.hpp          events, traces, well-formedness, po/rf
//   trace_io.hpp       text format parse/serialize, trace generator
//   commutativity.hpp  dependence, AftSet folds, swap-adjacency detector
//   seqp.hpp           order-preserving-prefix race detector
//   grains.hpp         windowed (granular) prefix race detector
//   oracle.hpp         brute-force reference semantics, small scale only
//   enumerate.hpp      exhaustive small-trace enumeration
//   differential.hpp   detector-vs-reference comparison batteries
//   report.hpp         race reports: text, JSON, benchmark CSV
//   driver.hpp         streaming runs, state partitioning, timeouts

#include "racepred/commutativity.hpp"
#include "racepred/differential.hpp"
#include "racepred/driver.hpp"
#include "racepred/enumerate.hpp"
#include "racepred/grains.hpp"
#include "racepred/oracle.hpp"
#include "racepred/report.hpp"
#include "racepred/seqp.hpp"
#include "racepred/trace.hpp"
#include "racepred/trace_io.hpp"
