#pragma once

#include "skyreg/collab/agents.hpp"
#include "skyreg/collab/episode.hpp"
#include "skyreg/collab/wire.hpp"
#include "skyreg/collab/world.hpp"
#include "skyreg/eval.hpp"
#include "skyreg/fft.hpp"
#include "skyreg/logpolar.hpp"
#include "skyreg/pgm.hpp"
#include "skyreg/phase_correlation.hpp"
#include "skyreg/raster.hpp"
#include "skyreg/registration.hpp"
#include "skyreg/rng.hpp"
#include "skyreg/sim2.hpp"
#include "skyreg/warp.hpp"
