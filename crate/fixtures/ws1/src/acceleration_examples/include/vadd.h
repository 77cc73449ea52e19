#pragma once
void vadd(const int *a, const int *b, int *c, int n);
