#pragma once

#include "svgtok/error.hpp"
#include "svgtok/svg_ir.hpp"
#include "svgtok/color.hpp"
#include "svgtok/transform.hpp"
#include "svgtok/path_geometry.hpp"
#include "svgtok/preprocess.hpp"
#include "svgtok/atomic.hpp"
#include "svgtok/vocab_io.hpp"
#include "svgtok/segments.hpp"
#include "svgtok/segment_learner.hpp"
#include "svgtok/rng.hpp"
#include "svgtok/hmn.hpp"
#include "svgtok/corpus_metrics.hpp"
#include "svgtok/io.hpp"
