// Umbrella header.
#pragma once

#include "psidag/driver.hpp"
#include "psidag/experiment.hpp"
#include "psidag/graphgen.hpp"
#include "psidag/io.hpp"
#include "psidag/metrics.hpp"
#include "psidag/model.hpp"
#include "psidag/optimizer.hpp"
#include "psidag/projection.hpp"
#include "psidag/rng.hpp"
#include "psidag/semdata.hpp"
#include "psidag/types.hpp"
