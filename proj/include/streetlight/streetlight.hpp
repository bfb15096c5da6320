#pragma once

#include "streetlight/async.hpp"
#include "streetlight/bundle.hpp"
#include "streetlight/codegen.hpp"
#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"
#include "streetlight/evolution.hpp"
#include "streetlight/fitness.hpp"
#include "streetlight/rules.hpp"
#include "streetlight/scenario.hpp"
#include "streetlight/serialization.hpp"
#include "streetlight/util.hpp"
#include "streetlight/world.hpp"
