/*
 * Copyright 2026 the pimsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

namespace pimsim {

/// Executable experiment descriptions shipped as data. Each recipe names the
/// property it demonstrates and is runnable verbatim by the CLI and by the
/// validation pass (which runs every recipe at its stored scale).
struct RecipeOutcome {
    std::string name;
    bool pass = false;
    std::vector<std::string> messages;
};

RecipeOutcome run_recipe_file(const std::string& path);
std::vector<RecipeOutcome> validate_recipes_dir(const std::string& dir);

}  // namespace pimsim
