#pragma once

#define CAPSEARCH_VERSION "0.1.0"
