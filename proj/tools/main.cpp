// Thin command-line shim over the shared library's C API.

#include <clarify.h>

int main(int argc, char** argv) {
    return clarify_run(argc, const_cast<const char* const*>(argv));
}
