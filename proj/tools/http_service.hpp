#pragma once

#include <httplib.h>

#include "discofeed/discofeed.h"

namespace discofeed::http {

// Maps a C API status to the HTTP status returned to clients.
int http_status(df_status s) noexcept;

// Installs the tutoring endpoints on `server`. The engine must outlive it.
void register_routes(httplib::Server& server, df_engine* engine);

}  // namespace discofeed::http
