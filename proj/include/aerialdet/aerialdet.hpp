#pragma once

// Convenience include for the whole library.

#include "aerialdet/classifiers.hpp"
#include "aerialdet/cnn.hpp"
#include "aerialdet/config.hpp"
#include "aerialdet/elm.hpp"
#include "aerialdet/errors.hpp"
#include "aerialdet/eval.hpp"
#include "aerialdet/features.hpp"
#include "aerialdet/image.hpp"
#include "aerialdet/image_io.hpp"
#include "aerialdet/model_io.hpp"
#include "aerialdet/optical_flow.hpp"
#include "aerialdet/parallel.hpp"
#include "aerialdet/pipeline.hpp"
#include "aerialdet/render.hpp"
#include "aerialdet/rng.hpp"
#include "aerialdet/sample.hpp"
#include "aerialdet/scene.hpp"
#include "aerialdet/scene_io.hpp"
#include "aerialdet/svm.hpp"
