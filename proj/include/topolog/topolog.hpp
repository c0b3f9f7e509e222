#pragma once

#include "topolog/complex_builder.hpp"
#include "topolog/counts.hpp"
#include "topolog/error.hpp"
#include "topolog/log_model.hpp"
#include "topolog/ml.hpp"
#include "topolog/pers_image.hpp"
#include "topolog/persistence.hpp"
#include "topolog/pipeline.hpp"
#include "topolog/spectral.hpp"
#include "topolog/synth_gen.hpp"
