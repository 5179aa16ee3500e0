#pragma once

// Umbrella header for the ARSRG library.

#include "arsrg/embedding.hpp"
#include "arsrg/errors.hpp"
#include "arsrg/features.hpp"
#include "arsrg/graph.hpp"
#include "arsrg/image.hpp"
#include "arsrg/matching.hpp"
#include "arsrg/pipeline.hpp"
#include "arsrg/rag.hpp"
#include "arsrg/segmentation.hpp"
