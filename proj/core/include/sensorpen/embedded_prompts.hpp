#pragma once

// Access to the prompt fixture files compiled into the library.

#include <string_view>
#include <vector>

namespace sensorpen::prompt::detail {

struct EmbeddedPrompt {
  std::string_view key;       // "<task>/<variant>"
  std::string_view contents;  // file bytes, header lines included
};

const std::vector<EmbeddedPrompt>& embedded_prompts();

}  // namespace sensorpen::prompt::detail
