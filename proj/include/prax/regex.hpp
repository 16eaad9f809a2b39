#pragma once

#include "prax/regex/ast.hpp"
#include "prax/regex/charset.hpp"
#include "prax/regex/consistency.hpp"
#include "prax/regex/dfa.hpp"
#include "prax/regex/example.hpp"
#include "prax/regex/parser.hpp"
#include "prax/regex/program.hpp"
