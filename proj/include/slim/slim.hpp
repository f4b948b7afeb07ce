#pragma once

// Umbrella header for the SLIM library.

#include "slim/basis.hpp"
#include "slim/dataset.hpp"
#include "slim/diagnostics.hpp"
#include "slim/error.hpp"
#include "slim/io/csv.hpp"
#include "slim/io/diagnostics_csv.hpp"
#include "slim/io/dot.hpp"
#include "slim/io/format.hpp"
#include "slim/io/run_config.hpp"
#include "slim/io/tree_json.hpp"
#include "slim/linalg.hpp"
#include "slim/parallel.hpp"
#include "slim/refit.hpp"
#include "slim/simgen.hpp"
#include "slim/tree.hpp"
