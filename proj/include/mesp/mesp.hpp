#pragma once

// Umbrella header for the MESP bounds library.

#include "mesp/bnb.hpp"
#include "mesp/bqp.hpp"
#include "mesp/instance.hpp"
#include "mesp/linalg.hpp"
#include "mesp/linx.hpp"
#include "mesp/mixer.hpp"
#include "mesp/nlp.hpp"
#include "mesp/tuner.hpp"
