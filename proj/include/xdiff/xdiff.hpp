#pragma once

#include "xdiff/errors.hpp"
#include "xdiff/grid.hpp"
#include "xdiff/model.hpp"
#include "xdiff/energetics.hpp"
#include "xdiff/integrate.hpp"
#include "xdiff/stability.hpp"
