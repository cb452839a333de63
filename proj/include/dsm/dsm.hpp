#pragma once

#include "dsm/common.hpp"
#include "dsm/dp.hpp"
#include "dsm/eval.hpp"
#include "dsm/io.hpp"
#include "dsm/kernels.hpp"
#include "dsm/mdp.hpp"
#include "dsm/ot.hpp"
#include "dsm/parallel.hpp"
#include "dsm/rng.hpp"
#include "dsm/sr.hpp"
#include "dsm/td.hpp"
