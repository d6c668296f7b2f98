#pragma once

#include "embedrank/cab.hpp"
#include "embedrank/data.hpp"
#include "embedrank/errors.hpp"
#include "embedrank/eval.hpp"
#include "embedrank/linalg.hpp"
#include "embedrank/mining.hpp"
#include "embedrank/model.hpp"
#include "embedrank/model_io.hpp"
#include "embedrank/nn.hpp"
#include "embedrank/rerank.hpp"
#include "embedrank/rng.hpp"
#include "embedrank/synth.hpp"
#include "embedrank/train.hpp"
