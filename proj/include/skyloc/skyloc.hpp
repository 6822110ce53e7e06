#pragma once

#include "skyloc/config.hpp"
#include "skyloc/errors.hpp"
#include "skyloc/features.hpp"
#include "skyloc/geometry.hpp"
#include "skyloc/io.hpp"
#include "skyloc/loss.hpp"
#include "skyloc/pairing.hpp"
#include "skyloc/retrieval.hpp"
#include "skyloc/rng.hpp"
#include "skyloc/sampling.hpp"
#include "skyloc/synthgen.hpp"
#include "skyloc/tilemap.hpp"
#include "skyloc/trainer.hpp"
#include "skyloc/version.hpp"
