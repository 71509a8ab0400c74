/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string_view>

#include "aggline/relation.hpp"

namespace aggline {

/// Parses the textual predicate form
///
///   expr    := 'true' | clause ('AND' clause)*
///   clause  := attr op literal
///            | attr 'IN' '(' literal (',' literal)* ')'
///            | attr 'BETWEEN' literal 'AND' literal
///   op      := '=' | '!=' | '<' | '<=' | '>' | '>='
///   literal := number | 'text' | "text" | bare word
///
/// Keywords are case-insensitive. Throws ParseError carrying the offset of
/// the offending token.
Predicate parse_predicate(std::string_view text);

}  // namespace aggline
