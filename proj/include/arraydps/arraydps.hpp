#pragma once

#include "arraydps/types.hpp"
#include "arraydps/rng.hpp"
#include "arraydps/stft.hpp"
#include "arraydps/wav.hpp"
#include "arraydps/acoustic.hpp"
#include "arraydps/fcp.hpp"
#include "arraydps/iva.hpp"
#include "arraydps/prior.hpp"
#include "arraydps/schedule.hpp"
#include "arraydps/sampler.hpp"
#include "arraydps/metrics.hpp"
