#pragma once

// Single include point for cpp-httplib so the TLS switch is set everywhere.
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <httplib.h>
