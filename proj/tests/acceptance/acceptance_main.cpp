/*
   Copyright 2026 The circulant_clt Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Acceptance suite driver: one PASS/FAIL line per criterion, exit 0 iff all pass.
// Usage: acceptance [criterion ids...]

#include <cstdlib>
#include <iostream>
#include <string>

#include "circulant_clt/acceptance.hpp"

int main(int argc, char** argv) {
    circulant_clt::acceptance::Options opt;
    for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
    const auto results = circulant_clt::acceptance::run(opt, std::cout);
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    std::cout << passed << " of " << results.size() << " criteria passed\n";
    return circulant_clt::acceptance::all_pass(results) ? 0 : 1;
}
