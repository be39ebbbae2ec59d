#pragma once

#include <floatlab/cli.hpp>
#include <floatlab/convexfn.hpp>
#include <floatlab/epigraph.hpp>
#include <floatlab/errors.hpp>
#include <floatlab/experiments.hpp>
#include <floatlab/floating.hpp>
#include <floatlab/function_spec.hpp>
#include <floatlab/numerics.hpp>
#include <floatlab/parallel.hpp>
#include <floatlab/surface.hpp>
