#include <clarify.h>
int main(){ return 0; }
