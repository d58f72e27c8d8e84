#pragma once

// Umbrella header: rigid-deflection identification from node displacement
// fields, confidence statistics, and compliance-matrix assembly.

#include "fieldfit/beam.hpp"
#include "fieldfit/compliance.hpp"
#include "fieldfit/core.hpp"
#include "fieldfit/estimators.hpp"
#include "fieldfit/fieldgen.hpp"
#include "fieldfit/io.hpp"
#include "fieldfit/statistics.hpp"
#include "fieldfit/study.hpp"
