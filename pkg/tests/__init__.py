# Test package init
