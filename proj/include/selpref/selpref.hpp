// Umbrella header.
#pragma once

#include "selpref/conllu.hpp"
#include "selpref/errors.hpp"
#include "selpref/features.hpp"
#include "selpref/hyperparams.hpp"
#include "selpref/io.hpp"
#include "selpref/model.hpp"
#include "selpref/pairs.hpp"
#include "selpref/rng.hpp"
#include "selpref/trainer.hpp"
#include "selpref/vocab.hpp"
