#pragma once

// Every translation unit must see httplib with the same feature set, or the
// Client/Server layouts silently diverge. Include this instead of <httplib.h>.
#ifdef WEBLAPSE_HAVE_OPENSSL
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#endif
#include <httplib.h>
