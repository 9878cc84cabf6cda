#pragma once
// Umbrella header: the whole library in dependency order.

#include "homlat/version.hpp"
#include "homlat/errors.hpp"
#include "homlat/rng.hpp"
#include "homlat/grid.hpp"
#include "homlat/field.hpp"
#include "homlat/matrix.hpp"
#include "homlat/weights.hpp"
#include "homlat/calculus.hpp"
#include "homlat/fft.hpp"
#include "homlat/ensemble.hpp"
#include "homlat/operator.hpp"
#include "homlat/solver.hpp"
#include "homlat/stats.hpp"
#include "homlat/multipliers.hpp"
#include "homlat/helmholtz.hpp"
#include "homlat/green_probes.hpp"
#include "homlat/cz.hpp"
#include "homlat/enumeration.hpp"
#include "homlat/parallel.hpp"
#include "homlat/moments.hpp"
#include "homlat/reports.hpp"
