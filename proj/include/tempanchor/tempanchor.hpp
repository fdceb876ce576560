#ifndef TEMPANCHOR_TEMPANCHOR_HPP
#define TEMPANCHOR_TEMPANCHOR_HPP

#include "tempanchor/anchor.hpp"
#include "tempanchor/classify.hpp"
#include "tempanchor/corpus.hpp"
#include "tempanchor/error.hpp"
#include "tempanchor/experiments.hpp"
#include "tempanchor/features.hpp"
#include "tempanchor/forest.hpp"
#include "tempanchor/nn/adam.hpp"
#include "tempanchor/nn/flops.hpp"
#include "tempanchor/nn/gradcheck.hpp"
#include "tempanchor/nn/layers.hpp"
#include "tempanchor/nn/model.hpp"
#include "tempanchor/parallel.hpp"
#include "tempanchor/rng.hpp"
#include "tempanchor/synth.hpp"

#endif // TEMPANCHOR_TEMPANCHOR_HPP
