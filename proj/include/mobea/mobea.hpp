#ifndef MOBEA_MOBEA_HPP
#define MOBEA_MOBEA_HPP

#include "mobea/array.hpp"
#include "mobea/config.hpp"
#include "mobea/correntropy.hpp"
#include "mobea/decode.hpp"
#include "mobea/metrics.hpp"
#include "mobea/moea.hpp"
#include "mobea/montecarlo.hpp"
#include "mobea/noise.hpp"
#include "mobea/rng.hpp"
#include "mobea/solver.hpp"

#endif
