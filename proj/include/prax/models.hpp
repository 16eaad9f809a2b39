#pragma once

#include "prax/models/common.hpp"
#include "prax/models/listener.hpp"
#include "prax/models/speaker.hpp"
