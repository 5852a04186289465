public class Fib4 {
    public static long calFib(long number){
        long f1=0, f2=1, c=0;
        switch(number){
            case 0:
                return 0;
            case 1:
                return 1;
            default:
                break;
        }
        while(number>=2){
            c=f1+f2; f1=f2; f2=c;
            number--;
        }
        return c;
    }
}
