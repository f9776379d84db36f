#pragma once

#include "tnale/errors.hpp"
#include "tnale/tensor.hpp"
#include "tnale/structure.hpp"
#include "tnale/network.hpp"
#include "tnale/random.hpp"
#include "tnale/solver.hpp"
#include "tnale/objective.hpp"
#include "tnale/search.hpp"
#include "tnale/landscape.hpp"
#include "tnale/datagen.hpp"
#include "tnale/io.hpp"
