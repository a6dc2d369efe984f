#pragma once

// Umbrella header for the whole library.

#include "prgc/autodiff.hpp"
#include "prgc/checkpoint.hpp"
#include "prgc/core.hpp"
#include "prgc/data.hpp"
#include "prgc/decoder.hpp"
#include "prgc/encoder.hpp"
#include "prgc/errors.hpp"
#include "prgc/eval.hpp"
#include "prgc/infer.hpp"
#include "prgc/labeling.hpp"
#include "prgc/loss.hpp"
#include "prgc/matrix.hpp"
#include "prgc/model.hpp"
#include "prgc/prediction_io.hpp"
#include "prgc/train.hpp"
