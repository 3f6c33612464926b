#pragma once

// Property testing for the average of T heterogeneous distributions from
// c labeled samples per source: uniformity (c=2), identity via reduction
// (c=2), closeness (c=3), Poissonized pooling, hard-instance generators,
// and a Monte Carlo harness.

#include "niid/batch.hpp"
#include "niid/closeness.hpp"
#include "niid/harness.hpp"
#include "niid/identity.hpp"
#include "niid/instances.hpp"
#include "niid/io.hpp"
#include "niid/pooled.hpp"
#include "niid/prob.hpp"
#include "niid/rational.hpp"
#include "niid/rng.hpp"
#include "niid/stats.hpp"
#include "niid/uniformity.hpp"
#include "niid/verdict.hpp"
