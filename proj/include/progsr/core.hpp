#pragma once

#include "progsr/core/errors.hpp"
#include "progsr/core/hash.hpp"
#include "progsr/core/random.hpp"
#include "progsr/core/tensor.hpp"
#include "progsr/core/types.hpp"
