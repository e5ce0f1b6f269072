#pragma once

#include "examkit/baseline.hpp"
#include "examkit/corpus.hpp"
#include "examkit/dataprep.hpp"
#include "examkit/error.hpp"
#include "examkit/extract.hpp"
#include "examkit/inference.hpp"
#include "examkit/prompt.hpp"
#include "examkit/report.hpp"
#include "examkit/rng.hpp"
#include "examkit/scoring.hpp"
#include "examkit/utf8.hpp"
