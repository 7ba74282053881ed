#ifndef MIXSEP_MIXSEP_HPP
#define MIXSEP_MIXSEP_HPP

#include "boxdim.hpp"
#include "concentration.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "measure.hpp"
#include "random.hpp"
#include "separator.hpp"
#include "sources.hpp"

#endif  // MIXSEP_MIXSEP_HPP
