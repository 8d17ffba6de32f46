#pragma once

namespace mrlft {

const char* version_string();

}  // namespace mrlft
