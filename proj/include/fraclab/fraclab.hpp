#pragma once

#include "fraclab/errors.hpp"
#include "fraclab/util.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/operators.hpp"
#include "fraclab/assemble1d.hpp"
#include "fraclab/assemble2d.hpp"
#include "fraclab/transform.hpp"
#include "fraclab/spectrum.hpp"
#include "fraclab/shape_calculus.hpp"
#include "fraclab/genericity.hpp"
#include "fraclab/serialization.hpp"
