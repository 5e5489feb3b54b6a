#pragma once

#include "neg/core.hpp"
#include "neg/dataset.hpp"
#include "neg/graph_io.hpp"
#include "neg/induction.hpp"
#include "neg/lexicon.hpp"
#include "neg/matching.hpp"
#include "neg/merging.hpp"
#include "neg/metrics.hpp"
#include "neg/pipeline.hpp"
#include "neg/providers.hpp"
#include "neg/pruning.hpp"
